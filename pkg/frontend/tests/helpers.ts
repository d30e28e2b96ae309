/** Test helpers: the recorded-fixture fetch and a URL-logging proxy. */

import { readFileSync } from "node:fs";
import { FetchLike } from "../src/api.js";

interface RecordedResponse {
  status: number;
  body: unknown;
}

const recorded: Record<string, RecordedResponse> = JSON.parse(
  readFileSync(new URL("../fixtures/recorded.json", import.meta.url), "utf-8"));

export const FIXTURE_BASE = "http://fixture.local";

export function fixture(key: string): RecordedResponse {
  const hit = recorded[key];
  if (!hit) throw new Error(`no recorded fixture for: ${key}`);
  return hit;
}

/** A FetchLike backed by the recorded responses. */
export function fixtureFetch(log?: string[]): FetchLike {
  return async (url: string) => {
    if (!url.startsWith(FIXTURE_BASE)) throw new Error(`unexpected base in ${url}`);
    const pathAndQuery = url.slice(FIXTURE_BASE.length);
    log?.push(pathAndQuery);
    const hit = recorded[`GET ${pathAndQuery}`];
    if (!hit) throw new Error(`no recorded fixture for: GET ${pathAndQuery}`);
    return {
      ok: hit.status >= 200 && hit.status < 300,
      status: hit.status,
      json: async () => hit.body,
    };
  };
}

/** Wraps a FetchLike, failing fast on any URL outside the documented routes. */
export function whitelistProxy(inner: FetchLike, seen: string[]): FetchLike {
  return (url: string) => {
    seen.push(url);
    return inner(url);
  };
}

export const PUBLIC_ROUTES = [
  /^\/api\/manifest$/,
  /^\/api\/search\?/,
  /^\/api\/records\/[^/]+$/,
  /^\/feeds\/(atom|kml|geojson)\?/,
  /^\/api\/zones$/,
  /^\/api\/zones\.png$/,
  /^\/codes\/[^/]+\.png$/,
];

export function isPublicRoute(pathAndQuery: string): boolean {
  return PUBLIC_ROUTES.some((route) => route.test(pathAndQuery));
}
