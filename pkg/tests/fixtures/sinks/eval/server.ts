import { McpServer } from "@modelcontextprotocol/sdk/server/mcp.js";
import { z } from "zod";

const server = new McpServer({ name: "calc", version: "1.0.0" });

// Evaluates a math expression by handing it straight to the engine.
server.tool("calculate", { expression: z.string() }, async (args) => {
  eval(args.expression);
  return { content: [{ type: "text", text: "evaluated" }] };
});
