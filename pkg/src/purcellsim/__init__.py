"""Simulator and analysis toolkit for dispersive qubit readout through a
Purcell filter, covering both the traditional chain and the filter-first
coupling topology."""

__version__ = "0.1.0"
