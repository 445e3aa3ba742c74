"""LLM-to-LLM conversational QA simulation and evaluation toolkit."""

__version__ = "0.1.0"
