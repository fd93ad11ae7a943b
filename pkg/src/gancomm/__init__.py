"""End-to-end learned communication link with a conditional-GAN channel
surrogate, plus classical baselines and a BLER evaluation harness."""

__version__ = "0.1.0"
