"""mcpsift: static data-flow scanner for MCP server source trees."""

__version__ = "0.1.0"
