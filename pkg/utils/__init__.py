# Utilities package for DuplexSched: linear algebra, random streams, config, logging
