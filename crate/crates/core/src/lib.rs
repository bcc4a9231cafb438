// Copyright 2026 The epirelax Authors
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

//! Relaxed free energy of epitaxially strained thin films with adatoms.

pub mod adatom;
pub mod convergence;
pub mod elastic;
pub mod energy;
pub mod envelope;
pub mod geometry;
pub mod io;
pub mod numeric;
pub mod profile;
pub mod recovery;
