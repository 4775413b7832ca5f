"""forumqa: forum-corpus topic segmentation, QA dataset tooling, and a
retriever-reader extractive QA pipeline."""

__version__ = "0.1.0"
