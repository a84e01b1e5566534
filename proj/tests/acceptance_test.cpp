// Copyright (c) 2026 The surfrec Authors
// SPDX-License-Identifier: Apache-2.0

int main() { return 1; }
