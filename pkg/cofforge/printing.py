"""
Plain-text rendering of reports: aligned tables and comma-separated
histogram rows for external plotting.
"""
import cofforge.constants as const

def format_table(header, rows):
  """
  Aligns columns of a table. Text columns are left aligned, numbers right
  aligned.

  Parameters
  ----------
  header: list of str
  rows: list of lists

  Example
  -------
  format_table(['source','n'], [['real', 3], ['synth', 12]])
  """
  cells = [[str(h) for h in header]] + [[str(c) for c in row] for row in rows]
  widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
  numeric = [all(_is_number(row[i]) for row in rows) for i in range(len(header))]
  lines = []
  for k,row in enumerate(cells):
    parts = []
    for i,c in enumerate(row):
      if numeric[i] and k > 0:
        parts.append(c.rjust(widths[i]))
      else:
        parts.append(c.ljust(widths[i]))
    lines.append("  ".join(parts).rstrip())
    if k == 0:
      lines.append("  ".join("-"*w for w in widths))
  return "\n".join(lines)

def _is_number(cell):
  try:
    float(cell)
    return True
  except (TypeError, ValueError):
    return False

def histogram_rows(hists):
  """
  CSV rows "name,bin,count" for labeled histograms, bins in order 0..10, 11+.

  Parameters
  ----------
  hists: list of (name, histogram dict)
  """
  rows = ["name,bin,count"]
  for name,hist in hists:
    for b in const.histogram_bins:
      rows.append("%s,%s,%d"%(name, b, hist.get(b, 0)))
  return rows
