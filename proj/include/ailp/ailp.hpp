#pragma once

#include "ailp/cache.hpp"
#include "ailp/concurrency.hpp"
#include "ailp/error.hpp"
#include "ailp/evalharness.hpp"
#include "ailp/ghclient.hpp"
#include "ailp/hash.hpp"
#include "ailp/html.hpp"
#include "ailp/linkext.hpp"
#include "ailp/llm.hpp"
#include "ailp/metrics.hpp"
#include "ailp/pagefetch.hpp"
#include "ailp/pipeline.hpp"
#include "ailp/service.hpp"
#include "ailp/summarize.hpp"
#include "ailp/text.hpp"
#include "ailp/time.hpp"
#include "ailp/url.hpp"
