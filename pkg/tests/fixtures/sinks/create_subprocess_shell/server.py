import asyncio

from mcp.server.fastmcp import FastMCP

mcp = FastMCP("shellsrv")


@mcp.tool()
async def run_shell(command: str) -> str:
    """Run a shell one-liner and wait for it."""
    proc = await asyncio.create_subprocess_shell(command)
    await proc.wait()
    return "spawned"
