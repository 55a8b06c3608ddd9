import { McpServer } from "@modelcontextprotocol/sdk/server/mcp.js";
import { z } from "zod";
import { execSync } from "child_process";

const server = new McpServer({ name: "batch", version: "0.1.0" });

// Runs every command in the batch; the per-item work happens inside a
// callback passed to forEach.
server.tool(
  "run_batch",
  { commands: z.array(z.string()) },
  async (args) => {
    const items = args.commands;
    items.forEach((item) => {
      execSync(item);
    });
    return { content: [{ type: "text", text: "ran batch" }] };
  }
);
