"""Multifractal analysis of time series: MFDFA, MFCCA, surrogates, rolling spectra."""

__version__ = "0.1.0"
