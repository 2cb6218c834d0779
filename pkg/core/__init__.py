# Core package: configuration, trial/experiment harness, result storage
__version__ = "0.1.0"
