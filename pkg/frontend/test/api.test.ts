import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";

interface Captured {
  url: string;
  init?: RequestInit;
}

function mockFetch(
  status: number,
  body: unknown,
): { calls: Captured[]; impl: (url: string, init?: RequestInit) => Promise<Response> } {
  const calls: Captured[] = [];
  return {
    calls,
    impl: async (url, init) => {
      calls.push({ url, init });
      return new Response(JSON.stringify(body), { status });
    },
  };
}

describe("api client", () => {
  it("posts scenarios to /sessions", async () => {
    const mock = mockFetch(200, { session_id: "abc", horizon_days: 14 });
    const client = new ApiClient("http://host", mock.impl);
    const info = await client.createSession({ version: "1" });
    expect(info.session_id).toBe("abc");
    expect(mock.calls[0].url).toBe("http://host/sessions");
    expect(mock.calls[0].init?.method).toBe("POST");
    expect(mock.calls[0].init?.body).toBe('{"version":"1"}');
  });

  it("threads sandbox and stepwise query flags", async () => {
    const mock = mockFetch(200, { pending: true, affected: [] });
    const client = new ApiClient("", mock.impl);
    await client.postDisruptions(
      "s1",
      [{ kind: "line_stoppage", target: "CP1", start_day: 0, duration_days: 2 }],
      { sandbox: true, stepwise: true },
    );
    expect(mock.calls[0].url).toBe(
      "/sessions/s1/disruptions?sandbox=true&stepwise=true",
    );
    const sent = JSON.parse(String(mock.calls[0].init?.body));
    expect(sent.events[0].target).toBe("CP1");
  });

  it("defaults query flags to false", async () => {
    const mock = mockFetch(200, { sandbox: false, world: {}, config: {} });
    const client = new ApiClient("", mock.impl);
    await client.getWorld("s1");
    expect(mock.calls[0].url).toBe("/sessions/s1/world?sandbox=false");
  });

  it("sends the bearer token when configured", async () => {
    const mock = mockFetch(200, { history: [] });
    const client = new ApiClient("", mock.impl, "sesame");
    await client.getHistory("s1");
    const headers = mock.calls[0].init?.headers as Record<string, string>;
    expect(headers.Authorization).toBe("Bearer sesame");
  });

  it("raises ApiError with the server detail on failure", async () => {
    const mock = mockFetch(409, { detail: "a stepwise run is in progress" });
    const client = new ApiClient("", mock.impl);
    await expect(client.step("s1")).rejects.toThrowError(ApiError);
    await expect(client.step("s1")).rejects.toMatchObject({
      status: 409,
      detail: "a stepwise run is in progress",
    });
  });

  it("uses DELETE for sandbox discard", async () => {
    const mock = mockFetch(200, { discarded: true });
    const client = new ApiClient("", mock.impl);
    await client.discardSandbox("s1");
    expect(mock.calls[0].init?.method).toBe("DELETE");
    expect(mock.calls[0].url).toBe("/sessions/s1/sandbox");
  });
});
