# Tools
