"""Discrete-event simulator for wireless mesh routing: OLSR, B.A.T.M.A.N. and SDN."""

__version__ = "0.1.0"
