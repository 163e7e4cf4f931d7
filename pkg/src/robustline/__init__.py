"""SNR-controlled noisy keyword benchmarking toolkit."""

__version__ = "0.1.0"
