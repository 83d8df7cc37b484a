"""Outage analysis of a two-user Alamouti/MRC NOMA downlink whose near user
acts as a nonlinear energy-harvesting full- or half-duplex relay."""

__version__ = "0.1.0"
