"""Run the HTTP service and consume a streamed action over NDJSON.

Starts uvicorn on a local port, ingests a manifest, creates a notebook, and
executes a Search cell, printing each event record as it arrives. This is the
same event stream the web notebook UI consumes.
"""

import json
import threading
import time

import httpx
import uvicorn

from sample_data import PROVIDERS, contract_source
from docforager.config import ApiConfig, build_runtime
from docforager.service import create_app

config = ApiConfig(data_dir="./demo-data", mock=True, auto_suggest=False, port=8901)
app = create_app(runtime=build_runtime(config))
server = uvicorn.Server(uvicorn.Config(app, host="127.0.0.1", port=config.port, log_level="error"))
thread = threading.Thread(target=server.run, daemon=True)
thread.start()
while not server.started:
    time.sleep(0.05)

base = f"http://127.0.0.1:{config.port}"
manifest = {
    "name": "demo-contracts",
    "goal": "find a cleaning service provider",
    "documents": [
        {
            "filename": f"contract_{i:02d}.txt",
            "elements": [
                {"text": el.text, "page": el.page}
                for el in contract_source(i, *p).elements
            ],
        }
        for i, p in enumerate(PROVIDERS)
    ],
}

with httpx.Client(base_url=base, timeout=30) as client:
    collection = client.post("/collections", json=manifest).json()
    print(f"ingested collection {collection['id']} with {len(collection['documents'])} documents")

    notebook = client.post("/notebooks", json={"collection_id": collection["id"]}).json()
    cell = client.post(
        f"/notebooks/{notebook['id']}/cells",
        json={"kind": "action", "action_kind": "Search", "raw_query": '"window cleaning"'},
    ).json()

    print("\nstreaming NDJSON events:")
    with client.stream("POST", f"/cells/{cell['cell_id']}/execute") as response:
        for line in response.iter_lines():
            if not line:
                continue
            event = json.loads(line)
            summary = {
                "ActionStarted": lambda e: f"columns={e['payload']['columns']}",
                "RowCompleted": lambda e: f"doc={e['payload']['doc_id']}",
                "ActionCompleted": lambda e: "final table delivered",
            }.get(event["event"], lambda e: "")(event)
            print(f"  seq={event['seq']:<3} {event['event']:<16} {summary}")

    table = client.get(f"/notebooks/{notebook['id']}/table").json()
    print(f"\naggregate table now has {len(table['columns'])} column(s) over {len(table['rows'])} rows")

server.should_exit = True
thread.join(timeout=5)
print("server stopped")
