"""Extractive QA microservice speaking the forumqa reader wire protocol."""

__version__ = "0.1.0"
