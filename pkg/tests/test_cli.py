import json
import os
import pytest

from cofforge.cli import run_subcommand, parse_seeds

from conftest import DEMO, fixture_path

def read_json(path):
  with open(path) as f:
    return json.load(f)

def read_bytes(path):
  with open(path, 'rb') as f:
    return f.read()

def read_records(path):
  with open(path) as f:
    return [json.loads(l) for l in f if l.strip()]

def test_parse_seeds():
  assert parse_seeds("0..3") == [0, 1, 2, 3]
  assert parse_seeds("5") == [5]

@pytest.mark.parametrize("argv", [
  ['simulate', '--seeds', '0..2'],
  ['simulate', '--seeds', '3..1', '--out', 'x.jsonl'],
  ['align', '--in', 'x.jsonl', '--out', 'y.jsonl', '--report', 'r.tsv', '--frames', '8'],
  ['curate', '--in', 'x.jsonl', '--out', 'y.jsonl', '--manifest', 'm.json', '--variant', 'steps'],
  ['transcode'],
  ['eval', '--tasks', 'a.jsonl', 'b.jsonl', '--preds', 'p.jsonl', '--report', 'r.json'],
])
def test_usage_errors_exit_2(argv):
  assert run_subcommand(argv) == 2

def test_simulate_is_reproducible(tmp_path):
  a = str(tmp_path/'a.jsonl')
  b = str(tmp_path/'b.jsonl')
  assert run_subcommand(['simulate', '--seeds', '0..4', '--out', a, '--quiet']) == 0
  assert run_subcommand(['simulate', '--seeds', '0..4', '--out', b, '--quiet']) == 0
  assert read_bytes(a) == read_bytes(b)
  run = read_json(a+".run.json")
  assert run['seeds'] == [0, 1, 2, 3, 4]
  assert run['counts'] == {'scenes': 5}
  assert run['config_hash'] == read_json(b+".run.json")['config_hash']

def test_synthetic_chain(tmp_path):
  scenes = str(tmp_path/'scenes.jsonl')
  aligned = str(tmp_path/'aligned.jsonl')
  report = str(tmp_path/'dropped.tsv')
  synth = str(tmp_path/'synth.jsonl')
  assert run_subcommand(['simulate', '--seeds', '0..9', '--out', scenes, '--quiet']) == 0
  assert run_subcommand(['align', '--in', scenes, '--out', aligned, '--report', report,
                         '--max-duration', '30', '--budget', '16', '--quiet']) == 0
  assert read_json(aligned+".run.json")['counts'] == {'aligned': 10, 'dropped': 0}
  assert run_subcommand(['synth', '--scenes', aligned, '--seed', '0', '--out', synth,
                         '--jobs', '2', '--quiet']) == 0
  with open(synth) as f:
    samples = [json.loads(l) for l in f]
  assert samples
  assert all(1 <= r <= 16 for s in samples for r in s['frame_refs'])

def test_real_gen_and_curate(tmp_path):
  videos = str(tmp_path/'videos.jsonl')
  real = str(tmp_path/'real.jsonl')
  rejects = str(tmp_path/'real_rejects.jsonl')
  dataset = str(tmp_path/'dataset.jsonl')
  man = str(tmp_path/'manifest.json')
  assert run_subcommand(['align', '--in', os.path.join(DEMO, 'real_annotations.jsonl'),
                         '--out', videos, '--report', str(tmp_path/'d.tsv'), '--quiet']) == 0
  assert run_subcommand(['real-gen', '--annotations', videos, '--client', 'replay',
                         '--fixtures', os.path.join(DEMO, 'replay.jsonl'), '--out', real,
                         '--rejects', rejects, '--quiet']) == 0
  assert read_json(real+".run.json")['counts']['rejects'] >= 2
  assert run_subcommand(['curate', '--in', real, '--target-zero-frac', '0.15', '--seed', '0',
                         '--out', dataset, '--manifest', man, '--variant', 'cot', '--quiet']) == 0
  data = read_json(man)
  assert data['total'] == data['by_source']['real']
  assert data['histogram']['0'] == data['total']

def test_replay_miss_is_a_data_error(tmp_path, capsys):
  fixtures = tmp_path/'replay.jsonl'
  fixtures.write_text('{"key": "nobody", "text": "x"}\n')
  status = run_subcommand(['real-gen', '--annotations', fixture_path('golden_annotation.jsonl'),
                           '--client', 'replay', '--fixtures', str(fixtures),
                           '--out', str(tmp_path/'r.jsonl'), '--rejects', str(tmp_path/'x.jsonl'),
                           '--quiet'])
  assert status == 1
  assert "error: golden_0001:" in capsys.readouterr().err

def test_malformed_input_reports_line(tmp_path, capsys):
  path = tmp_path/'bad.jsonl'
  path.write_text('{"video_id": "v", "duration_s": 5, "fps": 1, "captions": [[1, "a"]]}\nnot json\n')
  status = run_subcommand(['align', '--in', str(path), '--out', str(tmp_path/'o.jsonl'),
                           '--report', str(tmp_path/'r.tsv'), '--quiet'])
  assert status == 1
  assert "error: %s:2:"%(path) in capsys.readouterr().err

def test_missing_file_is_a_data_error(tmp_path):
  assert run_subcommand(['trace-stats', '--preds', str(tmp_path/'none.jsonl'),
                         '--out', str(tmp_path/'s.json')]) == 1

def test_eval_and_trace_stats(tmp_path):
  report = str(tmp_path/'report.json')
  stats = str(tmp_path/'stats.json')
  assert run_subcommand(['eval', '--tasks', fixture_path('bench_tasks.jsonl'),
                         '--preds', fixture_path('bench_preds.jsonl'), '--report', report]) == 0
  assert read_json(report)['overall'] == pytest.approx(0.661111111, abs=1.e-6)
  assert os.path.exists(report+".csv")
  assert run_subcommand(['trace-stats', '--preds', fixture_path('bench_preds.jsonl'),
                         '--out', stats]) == 0
  data = read_json(stats)
  assert data['n_predictions'] == 17
  assert data['histogram']['2'] == 4

def test_pipeline_on_demo_config(tmp_path):
  out = str(tmp_path/'out')
  assert run_subcommand(['pipeline', '--config', os.path.join(DEMO, 'pipeline.cfg'),
                         '--out-dir', out]) == 0
  data = read_json(os.path.join(out, 'manifest.json'))
  assert set(data['by_source']) == {'real', 'synth'}
  assert sum(1 for n in data['histogram'].values() if n > 0) >= 3
  assert data['zero_ref_fraction'] <= 0.15
  run = read_json(os.path.join(out, 'pipeline.run.json'))
  assert run['seeds'] == list(range(20))
  assert all(os.path.exists(p) for p in run['outputs'])
  first = read_bytes(os.path.join(out, 'dataset.jsonl'))

  again = str(tmp_path/'again')
  assert run_subcommand(['pipeline', '--config', os.path.join(DEMO, 'pipeline.cfg'),
                         '--out-dir', again]) == 0
  assert read_bytes(os.path.join(again, 'dataset.jsonl')) == first

def test_simulate_and_align_with_jobs(tmp_path):
  serial = str(tmp_path/'serial.jsonl')
  threaded = str(tmp_path/'threaded.jsonl')
  assert run_subcommand(['simulate', '--seeds', '0..7', '--out', serial, '--quiet']) == 0
  assert run_subcommand(['simulate', '--seeds', '0..7', '--out', threaded, '--jobs', '4',
                         '--quiet']) == 0
  assert read_bytes(serial) == read_bytes(threaded)
  outs = []
  for jobs in ('1', '3'):
    out = str(tmp_path/('aligned_%s.jsonl'%(jobs)))
    assert run_subcommand(['align', '--in', serial, '--out', out, '--report',
                           str(tmp_path/'d.tsv'), '--jobs', jobs, '--quiet']) == 0
    outs.append(read_bytes(out))
  assert outs[0] == outs[1]

def test_eval_merges_task_files(tmp_path):
  tasks = read_records(fixture_path('bench_tasks.jsonl'))
  preds = read_records(fixture_path('bench_preds.jsonl'))
  split_of = dict((t['task_id'], t['split']) for t in tasks)
  argv_tasks, argv_preds = [], []
  for split in ('choice', 'binary', 'numeric'):
    tpath = tmp_path/('%s_tasks.jsonl'%(split))
    ppath = tmp_path/('%s_preds.jsonl'%(split))
    tpath.write_text("".join(json.dumps(t)+"\n" for t in tasks if t['split'] == split))
    ppath.write_text("".join(json.dumps(p)+"\n" for p in preds if split_of[p['task_id']] == split))
    argv_tasks.append(str(tpath))
    argv_preds.append(str(ppath))
  report = str(tmp_path/'report.json')
  assert run_subcommand(['eval', '--tasks'] + argv_tasks + ['--preds'] + argv_preds +
                        ['--report', report]) == 0
  data = read_json(report)
  assert data['overall'] == pytest.approx(0.661111111, abs=1.e-6)
  assert read_json(report+".run.json")['counts']['tasks'] == 17

def test_align_warns_about_dropped_records(tmp_path, capsys):
  path = tmp_path/'videos.jsonl'
  path.write_text('{"video_id": "ok", "duration_s": 20, "fps": 1, "captions": [[2, "a"]]}\n'
                  '{"video_id": "long", "duration_s": 100, "fps": 1, "captions": [[1, "a"], [90, "b"]]}\n')
  report = str(tmp_path/'dropped.tsv')
  assert run_subcommand(['align', '--in', str(path), '--out', str(tmp_path/'o.jsonl'),
                         '--report', report, '--quiet']) == 0
  out = capsys.readouterr().out
  assert "Warning" in out
  assert "1 of 2 records dropped during alignment" in out
  with open(report) as f:
    assert f.read().startswith("long\tSpanExceeded")
