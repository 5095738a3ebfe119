#pragma once

#include "mrverb/analysis.hpp"
#include "mrverb/annotation.hpp"
#include "mrverb/annotation_store.hpp"
#include "mrverb/backbone.hpp"
#include "mrverb/batcher.hpp"
#include "mrverb/blob.hpp"
#include "mrverb/bpe.hpp"
#include "mrverb/corpus.hpp"
#include "mrverb/diagnostics.hpp"
#include "mrverb/error.hpp"
#include "mrverb/evaluation.hpp"
#include "mrverb/head.hpp"
#include "mrverb/judgments.hpp"
#include "mrverb/lemmatizer.hpp"
#include "mrverb/llm_client.hpp"
#include "mrverb/llm_http.hpp"
#include "mrverb/matrix.hpp"
#include "mrverb/optimizer.hpp"
#include "mrverb/pipeline.hpp"
#include "mrverb/pos_tagger.hpp"
#include "mrverb/prompt.hpp"
#include "mrverb/service.hpp"
#include "mrverb/tags.hpp"
#include "mrverb/text.hpp"
#include "mrverb/training.hpp"
