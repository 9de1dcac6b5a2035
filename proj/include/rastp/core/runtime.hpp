// Copyright 2026 The rastp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace rastp {

/// Keeps large temporaries on the heap instead of mmap/munmap per allocation.
/// Training allocates many short-lived multi-megabyte matrices; without this
/// a noticeable share of each step goes to page faults. No-op off glibc.
void tune_allocator();

}  // namespace rastp
