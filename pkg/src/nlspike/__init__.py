"""NLSpike - integer-only shift-add kernels for spiking Transformer nonlinearities."""

__version__ = "0.1.0"
