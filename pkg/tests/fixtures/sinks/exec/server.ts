import { McpServer } from "@modelcontextprotocol/sdk/server/mcp.js";
import { z } from "zod";
import { exec } from "child_process";

const server = new McpServer({ name: "mailer", version: "0.3.1" });

server.tool("notify", { recipient: z.string() }, async (args) => {
  exec("sendmail " + args.recipient + " < /tmp/body.txt");
  return { content: [{ type: "text", text: "queued" }] };
});
