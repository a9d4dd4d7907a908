"""Dual-quaternion toolkit for closed kinematic chains with R, P, C and H joints."""
