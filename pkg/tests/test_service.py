import time

import jsonschema
import pytest
from fastapi.testclient import TestClient

import edaexplain as e
from edaexplain.service import ServiceConfig, create_app, thread_cap

SONGS = b"""title,artist,year,decade,popularity
one,ann,1991,1990,20
two,ann,1992,1990,30
three,bob,1993,1990,40
four,bob,2001,2000,70
five,cat,2002,2000,80
six,cat,2003,2000,90
"""


def client(**cfg):
    return TestClient(create_app(ServiceConfig(**cfg)))


def new_session(c):
    r = c.post("/sessions")
    assert r.status_code == 201
    return r.json()["session_id"]


def upload(c, sid, name=None, body=SONGS, filename="songs.csv"):
    data = {"name": name} if name else {}
    return c.post(f"/sessions/{sid}/frames",
                  files={"file": (filename, body, "text/csv")}, data=data)


class TestSessions:
    def test_healthz(self):
        c = client()
        r = c.get("/healthz")
        assert r.status_code == 200
        assert r.json() == {"status": "ok"}

    def test_create_session(self):
        c = client()
        sid = new_session(c)
        assert len(sid) == 32

    def test_ttl_eviction(self):
        c = client(session_ttl=0.05)
        sid = new_session(c)
        assert upload(c, sid).status_code == 201
        time.sleep(0.1)
        c.post("/sessions")  # any store access sweeps
        assert upload(c, sid).status_code == 404


class TestUploads:
    def test_upload_summary(self):
        c = client()
        sid = new_session(c)
        r = upload(c, sid)
        assert r.status_code == 201
        body = r.json()
        assert body["name"] == "songs"
        assert body["row_count"] == 6
        assert [col["name"] for col in body["columns"]] == \
            ["title", "artist", "year", "decade", "popularity"]
        assert len(body["sample"]) == 5

    def test_explicit_name_overrides_filename(self):
        c = client()
        sid = new_session(c)
        r = upload(c, sid, name="music")
        assert r.json()["name"] == "music"

    def test_unknown_session(self):
        c = client()
        assert upload(c, "deadbeef").status_code == 404

    def test_duplicate_name_conflict(self):
        c = client()
        sid = new_session(c)
        assert upload(c, sid).status_code == 201
        assert upload(c, sid).status_code == 409

    def test_upload_cap(self):
        c = client(upload_cap=10)
        sid = new_session(c)
        r = upload(c, sid)
        assert r.status_code == 413

    def test_bad_utf8(self):
        c = client()
        sid = new_session(c)
        r = upload(c, sid, body=b"\xff\xfe\x00bad")
        assert r.status_code == 400
        assert "UTF-8" in r.json()["detail"]

    def test_bad_csv(self):
        c = client()
        sid = new_session(c)
        r = upload(c, sid, body=b"a,b\n1\n")
        assert r.status_code == 400


class TestSteps:
    def step(self, c, sid, **kv):
        body = {"op": "FILTER popularity >= 70", "inputs": ["songs"],
                "output": "hits", "config": {}}
        body.update(kv)
        return c.post(f"/sessions/{sid}/steps", json=body)

    def test_happy_path(self):
        c = client()
        sid = new_session(c)
        upload(c, sid)
        r = self.step(c, sid)
        assert r.status_code == 200
        body = r.json()
        assert body["output"]["name"] == "hits"
        assert body["output"]["row_count"] == 3
        payload = body["explanations"]
        jsonschema.validate(payload, e.load_schema())
        assert payload["version"] == "1"
        assert payload["explanations"]

    def test_output_becomes_usable_input(self):
        c = client()
        sid = new_session(c)
        upload(c, sid)
        assert self.step(c, sid).status_code == 200
        r = self.step(c, sid, op="FILTER popularity >= 80",
                      inputs=["hits"], output="best")
        assert r.status_code == 200
        assert r.json()["output"]["row_count"] == 2

    def test_unknown_session(self):
        c = client()
        assert self.step(c, "deadbeef").status_code == 404

    def test_unknown_input_frame(self):
        c = client()
        sid = new_session(c)
        r = self.step(c, sid, inputs=["nope"])
        assert r.status_code == 404
        assert "nope" in r.json()["detail"]

    def test_empty_inputs(self):
        c = client()
        sid = new_session(c)
        assert self.step(c, sid, inputs=[]).status_code == 400

    def test_output_name_conflict(self):
        c = client()
        sid = new_session(c)
        upload(c, sid)
        assert self.step(c, sid, output="songs").status_code == 409

    def test_bad_op_syntax(self):
        c = client()
        sid = new_session(c)
        upload(c, sid)
        r = self.step(c, sid, op="FILTER popularity >")
        assert r.status_code == 400
        assert "bad operation" in r.json()["detail"]

    def test_data_error(self):
        c = client()
        sid = new_session(c)
        upload(c, sid)
        r = self.step(c, sid, op="FILTER nosuch >= 1")
        assert r.status_code == 400

    def test_json_op_and_config(self):
        c = client()
        sid = new_session(c)
        upload(c, sid)
        r = self.step(c, sid,
                      op={"op": "filter", "column": "popularity",
                          "comparator": ">=", "literal": 70},
                      config={"top_k": 1, "columns": ["artist"]})
        assert r.status_code == 200
        exps = r.json()["explanations"]["explanations"]
        assert len(exps) == 1
        assert exps[0]["attribute"] == "artist"

    def test_union_step_over_two_frames(self):
        c = client()
        sid = new_session(c)
        upload(c, sid)
        upload(c, sid, name="more")
        r = self.step(c, sid, op="UNION", inputs=["songs", "more"],
                      output="all_songs")
        assert r.status_code == 200
        assert r.json()["output"]["row_count"] == 12


class TestRetryTokens:
    def test_timeout_then_poll(self):
        c = client(step_timeout=0.0)
        sid = new_session(c)
        upload(c, sid)
        r = c.post(f"/sessions/{sid}/steps",
                   json={"op": "FILTER popularity >= 70", "inputs": ["songs"],
                         "output": "hits", "config": {}})
        assert r.status_code == 202
        token = r.json()["retry_token"]
        deadline = time.time() + 10
        while time.time() < deadline:
            r = c.get(f"/sessions/{sid}/steps/{token}")
            if r.status_code != 202:
                break
            time.sleep(0.02)
        assert r.status_code == 200
        assert r.json()["output"]["name"] == "hits"
        # the token is single-use
        assert c.get(f"/sessions/{sid}/steps/{token}").status_code == 404

    def test_unknown_token(self):
        c = client()
        sid = new_session(c)
        assert c.get(f"/sessions/{sid}/steps/cafebabe").status_code == 404


class TestHistoryAndFrames:
    def test_history_accumulates(self):
        c = client()
        sid = new_session(c)
        upload(c, sid)
        c.post(f"/sessions/{sid}/steps",
               json={"op": "FILTER popularity >= 70", "inputs": ["songs"],
                     "output": "hits", "config": {}})
        c.post(f"/sessions/{sid}/steps",
               json={"op": "GROUPBY artist AGG mean(popularity)",
                     "inputs": ["hits"], "output": "by_artist", "config": {}})
        steps = c.get(f"/sessions/{sid}/history").json()["steps"]
        assert [s["output"] for s in steps] == ["hits", "by_artist"]
        assert steps[0]["op"] == "FILTER popularity >= 70.0"
        assert steps[0]["inputs"] == ["songs"]
        assert steps[0]["n_explanations"] == len(steps[0]["captions"])

    def test_frames_listing(self):
        c = client()
        sid = new_session(c)
        upload(c, sid)
        names = [f["name"] for f in c.get(f"/sessions/{sid}/frames").json()["frames"]]
        assert names == ["songs"]

    def test_history_unknown_session(self):
        c = client()
        assert c.get("/sessions/nope/history").status_code == 404


class TestAuth:
    def test_token_required(self):
        c = client(bearer_token="sesame")
        assert c.post("/sessions").status_code == 401
        assert c.get("/healthz").status_code == 200  # probe stays open
        r = c.post("/sessions", headers={"Authorization": "Bearer sesame"})
        assert r.status_code == 201
        assert c.post("/sessions",
                      headers={"Authorization": "Bearer wrong"}).status_code == 401


def test_thread_cap_env(monkeypatch):
    monkeypatch.delenv("EDA_EXPLAIN_THREADS", raising=False)
    assert thread_cap() == 4
    monkeypatch.setenv("EDA_EXPLAIN_THREADS", "9")
    assert thread_cap() == 9
    monkeypatch.setenv("EDA_EXPLAIN_THREADS", "0")
    assert thread_cap() == 1
    monkeypatch.setenv("EDA_EXPLAIN_THREADS", "many")
    assert thread_cap() == 4
