import { McpServer } from "@modelcontextprotocol/sdk/server/mcp.js";
import { z } from "zod";
import postgres from "postgres";

const server = new McpServer({ name: "events", version: "1.2.0" });
const db = postgres("postgres://localhost/events");

server.tool("purge_events", { label: z.string() }, async (args) => {
  db.unsafe("DELETE FROM events WHERE label = '" + args.label + "'");
  return { content: [{ type: "text", text: "purged" }] };
});
