# Tests for margin-engine
