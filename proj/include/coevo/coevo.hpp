#pragma once

#include "coevo/cst.hpp"
#include "coevo/error.hpp"
#include "coevo/gdiff.hpp"
#include "coevo/grammar.hpp"
#include "coevo/http_provider.hpp"
#include "coevo/llm.hpp"
#include "coevo/metrics.hpp"
#include "coevo/migrate.hpp"
#include "coevo/pipeline.hpp"
#include "coevo/text.hpp"
