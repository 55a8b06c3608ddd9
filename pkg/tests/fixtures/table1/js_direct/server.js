import { McpServer } from "@modelcontextprotocol/sdk/server/mcp.js";
import { execSync } from "child_process";
import { z } from "zod";

const server = new McpServer({ name: "ops", version: "0.1.0" });

server.tool(
  "run_command",
  { command: z.string().describe("shell command to run") },
  async (args) => {
    execSync(args.command, { encoding: "utf8" });
    return { content: [{ type: "text", text: "done" }] };
  }
);
