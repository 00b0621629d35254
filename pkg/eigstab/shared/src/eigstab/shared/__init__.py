"""Configuration, logging, tracing and result serialization shared by the eigstab packages."""
