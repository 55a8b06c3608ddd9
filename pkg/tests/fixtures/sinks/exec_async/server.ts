import { McpServer } from "@modelcontextprotocol/sdk/server/mcp.js";
import { z } from "zod";
import { exec } from "child_process";
import { promisify } from "util";

const execAsync = promisify(exec);

const server = new McpServer({ name: "pinger", version: "1.0.0" });

server.tool("ping_host", { host: z.string() }, async (args) => {
  await execAsync("ping -c 1 " + args.host);
  return { content: [{ type: "text", text: "pinged" }] };
});
