"""The REST surface, exercised in-process.

Builds two indices, then drives the JSON API the way an external client
would: admin job submission, text search, visual search and the global
multimodal endpoint.
"""
import base64
import io
import tempfile
import time
from pathlib import Path

from fastapi.testclient import TestClient
from PIL import Image as PILImage

from imsearch.core import DescriptorParams, IndexConfig, StorerParams
from imsearch.corpus import generate_corpus
from imsearch.indexing import IndexJob, load_image, run_index
from imsearch.service import create_app


def encode(image) -> str:
    buffer = io.BytesIO()
    PILImage.fromarray(image).save(buffer, format="PNG")
    return base64.b64encode(buffer.getvalue()).decode("ascii")


def main():
    workspace = Path(tempfile.mkdtemp(prefix="imsearch-demo-"))
    corpus = generate_corpus(workspace / "imgs", classes=4, per_class=8, size=32, seed=12)
    root = workspace / "indices"
    run_index(
        IndexJob(
            corpus.records,
            IndexConfig(
                descriptor=DescriptorParams(representation="hsv-hist"),
                storer=StorerParams("binary", "vectors.bin"),
                distance_default="histogram-intersection",
            ),
            root / "color",
        )
    )
    client = TestClient(create_app(root))
    print("registered indices:", client.get("/indices").json())

    # admin: build a second index through the API and poll the job
    layout_config = IndexConfig(
        descriptor=DescriptorParams(representation="color-layout"),
        storer=StorerParams("binary", "vectors.bin"),
        distance_default="euclidean",
    )
    job = client.post(
        "/admin/index",
        json={
            "name": "layout",
            "config": layout_config.to_dict(),
            "images": [r.to_json_dict() for r in corpus.records],
        },
    ).json()
    while True:
        status = client.get(f"/admin/index/{job['jobId']}").json()
        if status["status"] != "running":
            break
        time.sleep(0.05)
    print("admin job:", status["status"], status["report"])

    record = corpus.records[3]
    response = client.post(
        "/text-search", json={"text": record.caption, "indexNames": ["color"], "topN": 3}
    )
    print("\n/text-search top hit:", response.json()["results"][0]["imageId"])

    image = load_image(record.uri)
    response = client.post(
        "/visual-search",
        json={"positives": [{"data": encode(image)}], "indexNames": ["color"], "topN": 3},
    )
    print("/visual-search top hit:", response.json()["results"][0]["imageId"])

    response = client.post(
        "/search",
        json={
            "positives": [{"data": encode(image)}],
            "text": record.caption,
            "indexNames": ["color", "layout"],
            "topN": 5,
        },
    )
    print("/search (multimodal, two indices):")
    for row in response.json()["results"]:
        print(f"  {row['rank']}. {row['imageId']}  score {row['score']:.5f}  "
              f"modality {row['modality']}")


if __name__ == "__main__":
    main()
