"""Source-language frontends lowering files into the shared program model."""

from .loader import FrontendConfig, LoweringReport, load_project

__all__ = ["FrontendConfig", "LoweringReport", "load_project"]
