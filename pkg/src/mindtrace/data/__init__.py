"""Bundled data files: label schema, lexicons, stopwords, few-shot banks and ranking fixtures."""
