// Copyright 2026 The FlowDub Authors
// SPDX-License-Identifier: Apache-2.0
#include <cstdio>
int main() { std::printf("acceptance placeholder\n"); return 1; }
