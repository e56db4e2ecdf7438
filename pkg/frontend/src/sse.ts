// Incremental text/event-stream parser. Network chunks can split a frame
// anywhere and several events can share one chunk, so the parser keeps the
// unterminated tail between feeds. Comment lines (keepalives) are dropped.

export interface SseEvent {
  event: string;
  data: string;
}

export class SseParser {
  private buf = "";
  private eventName = "";
  private dataLines: string[] = [];

  feed(chunk: string): SseEvent[] {
    this.buf += chunk;
    const out: SseEvent[] = [];
    let nl: number;
    while ((nl = this.buf.indexOf("\n")) >= 0) {
      const line = this.buf.slice(0, nl).replace(/\r$/, "");
      this.buf = this.buf.slice(nl + 1);
      if (line === "") {
        // blank line terminates one event
        if (this.dataLines.length > 0) {
          out.push({
            event: this.eventName || "message",
            data: this.dataLines.join("\n"),
          });
        }
        this.eventName = "";
        this.dataLines = [];
        continue;
      }
      if (line.startsWith(":")) continue;
      const colon = line.indexOf(":");
      const field = colon < 0 ? line : line.slice(0, colon);
      let value = colon < 0 ? "" : line.slice(colon + 1);
      if (value.startsWith(" ")) value = value.slice(1);
      if (field === "event") this.eventName = value;
      else if (field === "data") this.dataLines.push(value);
    }
    return out;
  }
}

/** Pump a streaming response body through the parser until it ends. */
export async function readEventStream(
  body: ReadableStream<Uint8Array>,
  onEvent: (ev: SseEvent) => void,
): Promise<void> {
  const parser = new SseParser();
  const decoder = new TextDecoder();
  const reader = body.getReader();
  try {
    for (;;) {
      const { done, value } = await reader.read();
      if (done) break;
      for (const ev of parser.feed(decoder.decode(value, { stream: true }))) {
        onEvent(ev);
      }
    }
  } finally {
    reader.releaseLock();
  }
}
