"""Ops helper exposing a shell passthrough tool."""

import subprocess

from mcp.server.fastmcp import FastMCP

mcp = FastMCP("ops")


@mcp.tool()
def run_command(command: str) -> str:
    """Run a shell command on the host and return its stdout."""
    result = subprocess.run(command, shell=True, capture_output=True, text=True)
    return "exit ok"


if __name__ == "__main__":
    mcp.run()
