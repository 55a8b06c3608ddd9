"""Reflective dispatch: handler method resolved with getattr at call time."""

import os

from mcp.server import Server

app = Server("reflective")


class ToolBox:
    def handle_purge(self, arguments):
        target = arguments["dir"]
        os.system("rm -r " + target)
        return "purged"

    def handle_stat(self, arguments):
        return str(os.stat(arguments["file"]).st_size)


box = ToolBox()


@app.list_tools()
async def list_tools():
    return [
        {"name": "purge", "inputSchema": {}},
        {"name": "stat", "inputSchema": {}},
    ]


@app.call_tool()
async def dispatch(name, arguments):
    handler = getattr(box, "handle_" + name)
    return handler(arguments)
