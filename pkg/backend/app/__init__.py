# Book Summarizer Backend
