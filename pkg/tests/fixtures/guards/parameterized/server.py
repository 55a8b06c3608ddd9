import sqlite3

from mcp.server.fastmcp import FastMCP

mcp = FastMCP("notes")

db = sqlite3.connect("notes.db")
cursor = db.cursor()


@mcp.tool()
def delete_note(title: str) -> str:
    """Remove a note by its exact title."""
    cursor.execute("DELETE FROM notes WHERE title = ?", (title,))
    db.commit()
    return "deleted"
