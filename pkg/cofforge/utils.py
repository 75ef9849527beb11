import json
import numpy as np
from concurrent.futures import ThreadPoolExecutor

from .errors import DatasetFormatError

def norm(vec):
  return float(np.sqrt(np.dot(vec, vec)))

def unit(vec):
  """Unit vector along vec, or None for a zero vector."""
  nrm = norm(vec)
  if nrm == 0.0:
    return None
  return vec/nrm

def speeds(velocities):
  """Euclidean speed of every row of an (..., 3) velocity array."""
  return np.sqrt(np.sum(velocities**2, axis=-1))

def to_list(vec):
  return [float(x) for x in vec]

def round_half_down(x):
  """Nearest integer with ties going to the smaller integer."""
  return int(np.ceil(x - 0.5))

def ordered_map(func, items, jobs=1):
  """[func(x) for x in items], spread over jobs threads when jobs > 1."""
  if jobs > 1:
    with ThreadPoolExecutor(max_workers=jobs) as pool:
      return list(pool.map(func, items))
  return [func(x) for x in items]

################################################################################
# line-delimited json                                                          #
################################################################################
def dumps(record):
  return json.dumps(record, ensure_ascii=False)

def write_jsonl(path, records):
  """Writes one json record per line. Returns the number of records."""
  n = 0
  with open(path, 'w', encoding='utf-8') as f:
    for record in records:
      f.write(dumps(record)+"\n")
      n += 1
  return n

def iter_jsonl(path):
  """
  Yields (line_number, record) for every non-blank line.

  Raises
  ------
  DatasetFormatError
    for a line that is not a json object.
  """
  with open(path, 'r', encoding='utf-8') as f:
    for i,line in enumerate(f, 1):
      if not line.strip():
        continue
      try:
        record = json.loads(line)
      except ValueError as e:
        raise DatasetFormatError("malformed json (%s)"%(e), path, i)
      if not isinstance(record, dict):
        raise DatasetFormatError("expected a json object", path, i)
      yield i, record

def read_jsonl(path):
  return [record for _,record in iter_jsonl(path)]

def check_fields(record, fields, path=None, line=None, optional=()):
  """Rejects unknown and missing fields of a record."""
  unknown = sorted(set(record) - set(fields) - set(optional))
  if unknown:
    raise DatasetFormatError("unknown field(s) %s"%(", ".join(unknown)), path, line)
  missing = [k for k in fields if k not in record]
  if missing:
    raise DatasetFormatError("missing field(s) %s"%(", ".join(missing)), path, line)
