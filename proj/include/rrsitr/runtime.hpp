// Copyright 2026 The rrsitr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

namespace rrsitr {

// Raises the allocator's mmap and trim thresholds so the per-step batch
// matrices are recycled from the heap instead of mapped and unmapped each
// step. No-op outside glibc. Call once at program start.
void tune_allocator();

}  // namespace rrsitr
