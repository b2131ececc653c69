/** Server-sent-events client on top of fetch streams.
 *
 * fetch + ReadableStream instead of EventSource so reconnects can send the
 * Last-Event-ID header explicitly and the same code runs in tests (node)
 * and in the browser.
 */

export interface SseEvent {
  id?: string;
  event?: string;
  data: string;
}

export type ConnectionState = "connecting" | "open" | "retrying" | "closed";

/** Incremental SSE frame parser.
 *
 * Feed it the accumulated text buffer; it emits every complete event
 * (blank-line terminated) and returns the unconsumed remainder.
 */
export function drainSseBuffer(buffer: string, onEvent: (e: SseEvent) => void): string {
  let rest = buffer;
  for (;;) {
    const boundary = rest.indexOf("\n\n");
    if (boundary < 0) return rest;
    const frame = rest.slice(0, boundary);
    rest = rest.slice(boundary + 2);
    const event: SseEvent = { data: "" };
    const dataLines: string[] = [];
    for (const line of frame.split("\n")) {
      if (line === "" || line.startsWith(":")) continue;
      const sep = line.indexOf(":");
      const field = sep < 0 ? line : line.slice(0, sep);
      let value = sep < 0 ? "" : line.slice(sep + 1);
      if (value.startsWith(" ")) value = value.slice(1);
      if (field === "data") dataLines.push(value);
      else if (field === "id") event.id = value;
      else if (field === "event") event.event = value;
      // "retry" handled by the stream's own backoff
    }
    if (dataLines.length > 0 || event.id !== undefined || event.event !== undefined) {
      event.data = dataLines.join("\n");
      onEvent(event);
    }
  }
}

export interface EventStreamOptions {
  lastEventId?: string;
  onEvent: (e: SseEvent) => void;
  onState?: (state: ConnectionState) => void;
  /** base backoff in ms, doubled per consecutive failure (cap 10s) */
  retryBaseMs?: number;
  fetchImpl?: typeof fetch;
}

export class EventStream {
  private stopped = false;
  private lastEventId?: string;
  private readonly retryBase: number;
  private readonly doFetch: typeof fetch;

  constructor(private readonly url: string,
              private readonly options: EventStreamOptions) {
    this.lastEventId = options.lastEventId;
    this.retryBase = options.retryBaseMs ?? 500;
    this.doFetch = options.fetchImpl ?? fetch;
  }

  async run(): Promise<void> {
    let failures = 0;
    while (!this.stopped) {
      this.options.onState?.(failures === 0 ? "connecting" : "retrying");
      try {
        const headers: Record<string, string> = { Accept: "text/event-stream" };
        if (this.lastEventId !== undefined) headers["Last-Event-ID"] = this.lastEventId;
        const response = await this.doFetch(this.url, { headers });
        if (!response.ok || !response.body) {
          throw new Error(`event stream HTTP ${response.status}`);
        }
        this.options.onState?.("open");
        failures = 0;
        const reader = response.body.getReader();
        const decoder = new TextDecoder();
        let buffer = "";
        for (;;) {
          const { done, value } = await reader.read();
          if (this.stopped) {
            await reader.cancel().catch(() => undefined);
            break;
          }
          if (done) break;
          buffer += decoder.decode(value, { stream: true });
          buffer = drainSseBuffer(buffer, (event) => {
            if (event.id !== undefined) this.lastEventId = event.id;
            this.options.onEvent(event);
          });
        }
      } catch {
        // fall through to backoff
      }
      if (this.stopped) break;
      failures += 1;
      const delay = Math.min(this.retryBase * 2 ** (failures - 1), 10_000);
      await new Promise((resolve) => setTimeout(resolve, delay));
    }
    this.options.onState?.("closed");
  }

  stop(): void {
    this.stopped = true;
  }
}
