"""Publishes a tool that no dispatcher ever routes to."""

from mcp.server import Server

app = Server("ghost")


@app.list_tools()
async def list_tools():
    return [
        {
            "name": "phantom",
            "description": "Listed in the catalog but never wired up",
            "inputSchema": {"type": "object"},
        }
    ]
