import { McpServer } from "@modelcontextprotocol/sdk/server/mcp.js";
import { z } from "zod";

const server = new McpServer({ name: "plugins", version: "0.1.0" });

server.tool("register_hook", { body: z.string() }, async (args) => {
  const hook = new Function(args.body);
  hook();
  return { content: [{ type: "text", text: "registered" }] };
});
