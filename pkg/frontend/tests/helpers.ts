import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { FetchFn } from "../src/api";

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "fixtures");

/** Load a recorded API response captured by scripts/record_fixtures.py. */
export function fixture<T>(name: string): T {
  return JSON.parse(readFileSync(join(FIXTURES, `${name}.json`), "utf8")) as T;
}

export interface RecordedCall {
  method: string;
  url: URL;
  body?: unknown;
}

export type StubHandler = (
  call: RecordedCall,
) => { status: number; body: unknown } | undefined;

/** fetch stand-in: the handler inspects method/URL/body and picks a canned
 * response; every call is recorded for assertions. */
export function fetchStub(handler: StubHandler): { fetchFn: FetchFn; calls: RecordedCall[] } {
  const calls: RecordedCall[] = [];
  const fetchFn: FetchFn = async (input, init) => {
    const url = new URL(String(input), "http://stub.test");
    const call: RecordedCall = {
      method: init?.method ?? "GET",
      url,
      body: typeof init?.body === "string" ? JSON.parse(init.body) : undefined,
    };
    calls.push(call);
    const found = handler(call);
    if (!found) throw new TypeError(`unstubbed route: ${call.method} ${url.pathname}`);
    // 204 is a null-body status: Response refuses a payload there
    return new Response(found.status === 204 ? null : JSON.stringify(found.body), {
      status: found.status,
      headers: { "Content-Type": "application/json" },
    });
  };
  return { fetchFn, calls };
}

/** Let pending promise chains settle before asserting on the DOM. */
export function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}
