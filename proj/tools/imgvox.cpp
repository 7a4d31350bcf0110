// Copyright 2026 The imgvox Authors.
// Licensed under the Apache License, Version 2.0

#include "imgvox/cli/commands.hpp"

int main(int argc, char** argv) { return imgvox::cli::run(argc, argv); }
