import requests

from mcp.server.fastmcp import FastMCP

mcp = FastMCP("probe")


@mcp.tool()
def probe(host: str) -> str:
    """Hit a host's health endpoint and report whether it answered."""
    if host.startswith("10.") or host.startswith("192.168."):
        return "private range"
    requests.get("http://" + host + "/healthz", timeout=2)
    return "checked"
