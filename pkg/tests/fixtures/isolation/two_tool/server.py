"""Two tools share one dispatcher; only the render arm shells out."""

import os

from mcp.server import Server

app = Server("media")


@app.list_tools()
async def list_tools():
    return [
        {"name": "render", "description": "Rasterize an image", "inputSchema": {}},
        {"name": "version", "description": "Report the server build", "inputSchema": {}},
    ]


@app.call_tool()
async def dispatch(name, arguments):
    if name == "render":
        os.system("convert " + arguments["file"] + " out.png")
        return "rendered"
    elif name == "version":
        return "media server 1.0"
    raise ValueError(name)
