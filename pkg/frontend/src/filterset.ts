/**
 * FilterSet and the query-string grammar shared with the data service.
 *
 * Facet parameters take comma-separated value lists
 * (tomb_type=RockCut,LycianHouse), bbox is min_lon,min_lat,max_lon,max_lat,
 * paging travels as page/per_page. Serialization is canonical (fixed
 * parameter order, sorted values) so a FilterSet -> string -> FilterSet
 * round trip is the identity, which is what lets the panel paste its
 * current query straight into a narrative embed directive.
 */

export const TOMB_TYPES = [
  "TempleTomb", "Grabhaus", "VaultedChamber", "RockCut",
  "LycianHouse", "Pedestal", "Altar", "Larnax",
] as const;

export const SITE_CONTEXTS = [
  "Urban", "Village", "IsolatedNecropolis", "Isolated",
] as const;

export const AFFILIATIONS = ["Polis", "Mesogeia", "Hinterland"] as const;

export type TombType = (typeof TOMB_TYPES)[number];
export type SiteContext = (typeof SITE_CONTEXTS)[number];
export type Affiliation = (typeof AFFILIATIONS)[number];

export type BBox = [number, number, number, number];

export interface FilterSet {
  tomb_type?: TombType[];
  context?: SiteContext[];
  affiliation?: Affiliation[];
  has_inscription?: boolean;
  locus_id?: string[];
  bbox?: BBox;
  text?: string;
}

export class QueryGrammarError extends Error {
  readonly param: string;

  constructor(message: string, param: string) {
    super(message);
    this.param = param;
  }
}

/** Shortest decimal form, matching the service's number formatting. */
function fnum(x: number): string {
  if (!Number.isFinite(x)) throw new QueryGrammarError(`cannot format ${x}`, "bbox");
  if (Number.isInteger(x)) return String(x);
  const s = String(x);
  if (s.includes("e") || s.includes("E")) return x.toFixed(20).replace(/0+$/, "");
  return s;
}

const PARAM_ORDER = ["tomb_type", "context", "affiliation", "has_inscription",
  "locus_id", "bbox", "text"] as const;

export function toQueryString(filters: FilterSet): string {
  const parts: string[] = [];
  for (const name of PARAM_ORDER) {
    const value = filters[name];
    if (value === undefined) continue;
    let encoded: string;
    if (name === "has_inscription") {
      encoded = value ? "true" : "false";
    } else if (name === "bbox") {
      encoded = (value as BBox).map(fnum).join(",");
    } else if (name === "text") {
      encoded = encodeURIComponent(value as string);
    } else {
      const items = [...(value as string[])].sort();
      if (items.length === 0) continue;
      encoded = items.map(encodeURIComponent).join(",");
    }
    parts.push(`${name}=${encoded}`);
  }
  return parts.join("&");
}

function splitValues(raw: string): string[] {
  return raw.split(",").filter((v) => v !== "");
}

function checkMembers<T extends string>(
  values: string[], allowed: readonly T[], param: string): T[] {
  for (const v of values) {
    if (!(allowed as readonly string[]).includes(v)) {
      throw new QueryGrammarError(`unknown ${param} value: ${v}`, param);
    }
  }
  return [...values].sort() as T[];
}

export interface ParsedQuery {
  filters: FilterSet;
  page: number;
  perPage: number;
}

export function parseQueryString(query: string): ParsedQuery {
  const filters: FilterSet = {};
  let page = 1;
  let perPage = 50;
  const seen = new Set<string>();
  for (const pair of query.split("&")) {
    if (pair === "") continue;
    const eq = pair.indexOf("=");
    const key = eq < 0 ? pair : pair.slice(0, eq);
    const raw = eq < 0 ? "" : decodeURIComponent(pair.slice(eq + 1).replace(/\+/g, "%20"));
    if (seen.has(key)) throw new QueryGrammarError(`duplicate parameter: ${key}`, key);
    seen.add(key);
    switch (key) {
      case "page": {
        page = Number(raw);
        if (!Number.isInteger(page) || page < 1) {
          throw new QueryGrammarError("page must be >= 1", "page");
        }
        break;
      }
      case "per_page": {
        perPage = Number(raw);
        if (!Number.isInteger(perPage) || perPage < 1 || perPage > 500) {
          throw new QueryGrammarError("per_page must be in 1..500", "per_page");
        }
        break;
      }
      case "tomb_type":
        if (splitValues(raw).length) {
          filters.tomb_type = checkMembers(splitValues(raw), TOMB_TYPES, key);
        }
        break;
      case "context":
        if (splitValues(raw).length) {
          filters.context = checkMembers(splitValues(raw), SITE_CONTEXTS, key);
        }
        break;
      case "affiliation":
        if (splitValues(raw).length) {
          filters.affiliation = checkMembers(splitValues(raw), AFFILIATIONS, key);
        }
        break;
      case "has_inscription": {
        if (raw !== "true" && raw !== "false") {
          throw new QueryGrammarError("has_inscription must be true or false", key);
        }
        filters.has_inscription = raw === "true";
        break;
      }
      case "locus_id":
        if (splitValues(raw).length) filters.locus_id = splitValues(raw).sort();
        break;
      case "bbox": {
        const numbers = raw.split(",").map(Number);
        if (numbers.length !== 4 || numbers.some((n) => Number.isNaN(n))) {
          throw new QueryGrammarError("bbox needs exactly 4 numbers", key);
        }
        const [minLon, minLat, maxLon, maxLat] = numbers;
        if (minLon > maxLon || minLat > maxLat) {
          throw new QueryGrammarError("bbox is not well-ordered", key);
        }
        filters.bbox = numbers as BBox;
        break;
      }
      case "text":
        filters.text = raw;
        break;
      default:
        throw new QueryGrammarError(`unknown parameter: ${key}`, key);
    }
  }
  return { filters, page, perPage };
}

/** Canonical form: sorted set values, no empty arrays. */
export function normalize(filters: FilterSet): FilterSet {
  return parseQueryString(toQueryString(filters)).filters;
}

export function filtersEqual(a: FilterSet, b: FilterSet): boolean {
  return toQueryString(a) === toQueryString(b);
}

/** The fenced directive the export pipeline understands. */
export function embedDirective(filters: FilterSet, caption = "", master = false): string {
  const kind = master ? "mastermap" : "minimap";
  const query = toQueryString(filters);
  const head = query ? `\`\`\`${kind} ${query}` : `\`\`\`${kind}`;
  const lines = [head];
  if (caption && !master) lines.push(caption);
  lines.push("```");
  return lines.join("\n");
}
