import os

from mcp.server import Server

app = Server("cleaner")


@app.call_tool()
async def dispatch(name, arguments):
    match name:
        case "remove":
            victim = arguments["path"]
            os.system("rm " + victim)
            return "removed"
        case "count":
            return str(len(arguments))
        case _:
            return "?"
