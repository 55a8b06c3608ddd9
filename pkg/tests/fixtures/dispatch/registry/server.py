"""Registry-driven tool table; handlers live in the same module."""

import os

from mcp.server import Server

app = Server("registry")


def handle_ls(args):
    listing = os.popen("ls " + args["path"]).read()
    return listing


def handle_touch(args):
    os.system("touch " + args["name"])
    return "created"


HANDLERS = {"ls": handle_ls, "touch": handle_touch}


@app.list_tools()
async def list_tools():
    return [{"name": k, "inputSchema": {}} for k in HANDLERS]


@app.call_tool()
async def call(name, arguments):
    handler = HANDLERS[name]
    return handler(arguments)
