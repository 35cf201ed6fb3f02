"""Project persistence: articles, comments, ingestion with exact-duplicate
elimination, and the JSONL corpus interchange format.

A store keeps everything in memory and, when given a directory, writes one
JSON file per project after each mutation (atomic replace). Mutations are
serialized per project by a lock, so concurrent ingests behave as if run in
some total order and first-wins dedup stays well defined.
"""

from __future__ import annotations

import json
import os
import re
import threading
import unicodedata
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable, Iterator, Optional

from .errors import (
    EmptySelection,
    MalformedRecord,
    StoreCorrupt,
    UnknownArticle,
    UnknownProject,
)

KNOWN_SOURCES = frozenset({"echorouk", "elkhabar", "ennahar"})
KNOWN_TOPICS = frozenset({"news", "political", "religion", "sports", "society"})

_WS_RUN = re.compile(r"\s+")


def canonicalize_for_dedup(raw_text: str) -> str:
    """NFC-normalize, strip, and collapse internal whitespace runs to single
    spaces. No other alteration; the result is the comment's dedup identity."""
    text = unicodedata.normalize("NFC", raw_text)
    return _WS_RUN.sub(" ", text).strip()


@dataclass
class Article:
    article_id: str
    source: str  # echorouk | elkhabar | ennahar | any other name
    topic: str  # news | political | religion | sports | society | any other name
    title: str
    url: Optional[str] = None

    def __post_init__(self):
        if not self.article_id:
            raise MalformedRecord("article_id must be non-empty")
        if not self.source or not self.topic:
            raise MalformedRecord("source and topic must be non-empty")


@dataclass
class Comment:
    comment_id: str
    article_id: str
    raw_text: str  # preserved byte-exact, never mutated after ingest
    dedup_key: str
    ingested_at: str  # UTC ISO-8601; informational only


@dataclass
class IngestReport:
    added: int = 0
    duplicates_dropped: int = 0
    rejected_empty: int = 0

    def as_dict(self) -> dict[str, int]:
        return {
            "added": self.added,
            "duplicates_dropped": self.duplicates_dropped,
            "rejected_empty": self.rejected_empty,
        }


@dataclass
class Project:
    project_id: str
    name: str
    articles: dict[str, Article] = field(default_factory=dict)
    comments: dict[str, Comment] = field(default_factory=dict)
    dedup_index: set[str] = field(default_factory=set)
    next_comment_seq: int = 1
    next_round_seq: int = 1
    rounds: dict = field(default_factory=dict)  # round_id -> RoundState

    def comment_order(self) -> list[str]:
        return list(self.comments)


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class ProjectStore:
    """All projects known to one workbench instance.

    ``directory=None`` gives a purely in-memory store (tests, one-shot CLI
    runs); otherwise each project persists to <directory>/<project_id>.json.
    """

    def __init__(self, directory: Optional[str] = None):
        self.directory = directory
        self._projects: dict[str, Project] = {}
        self._locks: dict[str, threading.RLock] = {}
        self._store_lock = threading.RLock()
        if directory:
            os.makedirs(directory, exist_ok=True)
            self._load_all()

    # -- project management --

    def create_project(self, name: str) -> Project:
        with self._store_lock:
            project_id = "p%d" % (len(self._projects) + 1)
            while project_id in self._projects:
                project_id = "p%d" % (int(project_id[1:]) + 1)
            project = Project(project_id=project_id, name=name)
            self._projects[project_id] = project
            self._locks[project_id] = threading.RLock()
            self._save(project)
            return project

    def get_project(self, project_id: str) -> Project:
        try:
            return self._projects[project_id]
        except KeyError:
            raise UnknownProject("no project %r" % project_id) from None

    def find_project_by_name(self, name: str) -> Optional[Project]:
        for project in self._projects.values():
            if project.name == name:
                return project
        return None

    def list_projects(self) -> list[Project]:
        return list(self._projects.values())

    def lock(self, project_id: str) -> threading.RLock:
        with self._store_lock:
            if project_id not in self._projects:
                raise UnknownProject("no project %r" % project_id)
            return self._locks[project_id]

    # -- articles and comments --

    def add_article(self, project_id: str, article: Article) -> Article:
        project = self.get_project(project_id)
        with self.lock(project_id):
            existing = project.articles.get(article.article_id)
            if existing is not None:
                return existing
            project.articles[article.article_id] = article
            self._save(project)
            return article

    def ingest_comments(self, project_id: str, records: Iterable[dict]) -> IngestReport:
        """Store each record whose canonical text is new; drop duplicates
        (first occurrence wins) and count texts that canonicalize to empty."""
        project = self.get_project(project_id)
        report = IngestReport()
        with self.lock(project_id):
            for record in records:
                if not isinstance(record, dict) or "article_id" not in record or "raw_text" not in record:
                    raise MalformedRecord(
                        "ingest records need article_id and raw_text fields"
                    )
                article_id = record["article_id"]
                raw_text = record["raw_text"]
                if not isinstance(raw_text, str):
                    raise MalformedRecord("raw_text must be a string")
                if article_id not in project.articles:
                    raise UnknownArticle("no article %r in project %s" % (article_id, project_id))
                key = canonicalize_for_dedup(raw_text)
                if not key:
                    report.rejected_empty += 1
                    continue
                if key in project.dedup_index:
                    report.duplicates_dropped += 1
                    continue
                comment_id = "c%d" % project.next_comment_seq
                project.next_comment_seq += 1
                project.comments[comment_id] = Comment(
                    comment_id=comment_id,
                    article_id=article_id,
                    raw_text=raw_text,
                    dedup_key=key,
                    ingested_at=_utc_now(),
                )
                project.dedup_index.add(key)
                report.added += 1
            self._save(project)
        return report

    def import_corpus(self, project_id: str, rows: Iterable[dict]) -> IngestReport:
        """Ingest corpus-format rows, creating referenced articles on the fly."""
        project = self.get_project(project_id)
        with self.lock(project_id):
            records = []
            for row in rows:
                missing = {"article_id", "source", "topic", "title", "text"} - set(row)
                if missing:
                    raise MalformedRecord("corpus row missing fields: %s" % ", ".join(sorted(missing)))
                if row["article_id"] not in project.articles:
                    self.add_article(
                        project_id,
                        Article(
                            article_id=row["article_id"],
                            source=row["source"],
                            topic=row["topic"],
                            title=row["title"],
                            url=row.get("url"),
                        ),
                    )
                records.append({"article_id": row["article_id"], "raw_text": row["text"]})
            return self.ingest_comments(project_id, records)

    def select_comments(
        self,
        project_id: str,
        topic: Optional[str] = None,
        source: Optional[str] = None,
        article_ids: Optional[Iterable[str]] = None,
    ) -> list[Comment]:
        project = self.get_project(project_id)
        wanted = set(article_ids) if article_ids is not None else None
        out = []
        for comment in project.comments.values():
            article = project.articles[comment.article_id]
            if topic is not None and article.topic != topic:
                continue
            if source is not None and article.source != source:
                continue
            if wanted is not None and comment.article_id not in wanted:
                continue
            out.append(comment)
        return out

    def export_corpus(
        self,
        project_id: str,
        topic: Optional[str] = None,
        source: Optional[str] = None,
        article_ids: Optional[Iterable[str]] = None,
    ) -> Iterator[dict]:
        """Yield corpus rows for the selection; raises on an empty selection."""
        project = self.get_project(project_id)
        comments = self.select_comments(project_id, topic, source, article_ids)
        if not comments:
            raise EmptySelection("selection matches no comments")
        for comment in comments:
            article = project.articles[comment.article_id]
            yield {
                "article_id": article.article_id,
                "source": article.source,
                "topic": article.topic,
                "title": article.title,
                "text": comment.raw_text,
            }

    # -- persistence --

    def _path(self, project_id: str) -> str:
        return os.path.join(self.directory, project_id + ".json")

    def _save(self, project: Project):
        if not self.directory:
            return
        payload = _project_to_dict(project)
        path = self._path(project.project_id)
        tmp = path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, ensure_ascii=False)
        os.replace(tmp, path)

    def save(self, project_id: str):
        self._save(self.get_project(project_id))

    def _load_all(self):
        for name in sorted(os.listdir(self.directory)):
            if not name.endswith(".json"):
                continue
            path = os.path.join(self.directory, name)
            try:
                with open(path, encoding="utf-8") as fh:
                    payload = json.load(fh)
                project = _project_from_dict(payload)
            except (ValueError, KeyError, TypeError) as exc:
                raise StoreCorrupt("cannot load %s: %s" % (path, exc)) from exc
            self._projects[project.project_id] = project
            self._locks[project.project_id] = threading.RLock()


# -- JSONL corpus files --

def write_corpus_jsonl(rows: Iterable[dict], fh) -> int:
    count = 0
    for row in rows:
        fh.write(json.dumps(row, ensure_ascii=False) + "\n")
        count += 1
    return count


def read_corpus_jsonl(fh) -> Iterator[dict]:
    for lineno, line in enumerate(fh, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            row = json.loads(line)
        except ValueError as exc:
            raise MalformedRecord("corpus line %d is not valid JSON: %s" % (lineno, exc)) from exc
        if not isinstance(row, dict):
            raise MalformedRecord("corpus line %d is not an object" % lineno)
        yield row


# -- (de)serialization helpers --

def _project_to_dict(project: Project) -> dict:
    from .annotation import round_to_dict  # local import avoids a cycle

    return {
        "project_id": project.project_id,
        "name": project.name,
        "articles": [
            {
                "article_id": a.article_id,
                "source": a.source,
                "topic": a.topic,
                "title": a.title,
                "url": a.url,
            }
            for a in project.articles.values()
        ],
        "comments": [
            {
                "comment_id": c.comment_id,
                "article_id": c.article_id,
                "raw_text": c.raw_text,
                "dedup_key": c.dedup_key,
                "ingested_at": c.ingested_at,
            }
            for c in project.comments.values()
        ],
        "next_comment_seq": project.next_comment_seq,
        "next_round_seq": project.next_round_seq,
        "rounds": [round_to_dict(r) for r in project.rounds.values()],
    }


def _project_from_dict(payload: dict) -> Project:
    from .annotation import round_from_dict

    project = Project(project_id=payload["project_id"], name=payload["name"])
    for a in payload.get("articles", []):
        project.articles[a["article_id"]] = Article(
            article_id=a["article_id"],
            source=a["source"],
            topic=a["topic"],
            title=a["title"],
            url=a.get("url"),
        )
    for c in payload.get("comments", []):
        comment = Comment(
            comment_id=c["comment_id"],
            article_id=c["article_id"],
            raw_text=c["raw_text"],
            dedup_key=c["dedup_key"],
            ingested_at=c["ingested_at"],
        )
        project.comments[comment.comment_id] = comment
        project.dedup_index.add(comment.dedup_key)
    project.next_comment_seq = payload.get("next_comment_seq", len(project.comments) + 1)
    project.next_round_seq = payload.get("next_round_seq", 1)
    for r in payload.get("rounds", []):
        state = round_from_dict(r)
        project.rounds[state.round_id] = state
    return project
