from mcp.server import Server

app = Server("notes")


@app.list_tools()
async def list_tools():
    return [
        {"name": "read_notes", "inputSchema": {}},
        {"name": "status", "inputSchema": {}},
    ]


@app.call_tool()
async def dispatch(name, arguments):
    if name == "read_notes":
        data = open("/var/notes/db.txt").read()
        return data
    elif name == "status":
        return "ok"
