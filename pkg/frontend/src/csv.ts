/** Minimal RFC-4180-ish CSV handling for the `id,text,label` input format
 * and the engine's `id,label` output format. */

export interface TextRow {
  id: string;
  text: string;
  label: number;
}

function parseCsv(content: string): string[][] {
  const rows: string[][] = [];
  let row: string[] = [];
  let field = '';
  let inQuotes = false;
  let i = 0;
  while (i < content.length) {
    const ch = content[i];
    if (inQuotes) {
      if (ch === '"') {
        if (content[i + 1] === '"') { field += '"'; i += 2; continue; }
        inQuotes = false; i++; continue;
      }
      field += ch; i++; continue;
    }
    if (ch === '"') { inQuotes = true; i++; continue; }
    if (ch === ',') { row.push(field); field = ''; i++; continue; }
    if (ch === '\r') { i++; continue; }
    if (ch === '\n') { row.push(field); rows.push(row); row = []; field = ''; i++; continue; }
    field += ch; i++;
  }
  if (field.length > 0 || row.length > 0) { row.push(field); rows.push(row); }
  return rows;
}

export function parseTextDataset(content: string, path = '<input>'): TextRow[] {
  const rows = parseCsv(content).filter((r) => r.length > 1 || r[0] !== '');
  if (rows.length === 0) throw new Error(`${path}: empty CSV`);
  const header = rows[0].map((c) => c.trim().toLowerCase());
  const idCol = header.indexOf('id');
  const textCol = header.indexOf('text');
  const labelCol = header.indexOf('label');
  if (idCol < 0 || textCol < 0 || labelCol < 0) {
    throw new Error(`${path}: header must contain id, text, label columns`);
  }
  const out: TextRow[] = [];
  for (let r = 1; r < rows.length; r++) {
    const cells = rows[r];
    const label = Number(cells[labelCol]);
    if (!Number.isInteger(label) || label < 0) {
      throw new Error(`${path}: row ${r}: label ${cells[labelCol]!} is not a non-negative integer`);
    }
    out.push({ id: cells[idCol] ?? '', text: cells[textCol] ?? '', label });
  }
  return out;
}

function quote(value: string): string {
  if (/[",\n\r]/.test(value)) return '"' + value.replace(/"/g, '""') + '"';
  return value;
}

export function labelsCsv(rows: TextRow[]): string {
  const lines = ['id,label'];
  for (const row of rows) lines.push(`${quote(row.id)},${row.label}`);
  return lines.join('\n') + '\n';
}
