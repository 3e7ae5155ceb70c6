"""ARQ-based secret-key sharing workbench.

Subpackages cover the information-theoretic key-rate machinery (rates),
channel models (fading), feedback-driven rate adaptation (adapt),
delay-limited key distillation (coding), the ARQ-CROWN Wi-Fi overlay
protocol (crown), a deterministic session simulator (netsim), and the
experiment CLI (cli).
"""

__version__ = "0.1.0"
