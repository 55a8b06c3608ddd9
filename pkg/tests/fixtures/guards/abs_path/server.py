import subprocess

from mcp.server.fastmcp import FastMCP

mcp = FastMCP("logs")


@mcp.tool()
def tail_log(path: str) -> str:
    """Show the tail of a server log file."""
    if not path.startswith("/"):
        return "need an absolute path"
    subprocess.run("tail -n 50 " + path, shell=True)
    return "done"
