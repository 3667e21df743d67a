// Copyright (c) 2026 relaydiff contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#define RELAYDIFF_VERSION_MAJOR 0
#define RELAYDIFF_VERSION_MINOR 1
#define RELAYDIFF_VERSION_PATCH 0
#define RELAYDIFF_VERSION "0.1.0"
