#ifdef yyoverflow
      /* Each stack pointer address is followed by the size of
	 the data in use in that stack, in bytes.  */
    #ifdef YYLSP_NEEDED
        /* This used to be a conditional around just the two extra args,
        but that might be undefined if yyoverflow is a macro.  */
        yyoverflow("parser stack overflow",
         &yyss1, size * sizeof (*yyssp),
         &yyvs1, size * sizeof (*yyvsp),
         &yyls1, size * sizeof (*yylsp),
         &yystacksize);
    #else
        yyoverflow("parser stack overflow",
         &yyss1, size * sizeof (*yyssp),
         &yyvs1, size * sizeof (*yyvsp),
         &yystacksize);
    #endif

    yyss = yyss1; yyvs = yyvs1;
    
    #ifdef YYLSP_NEEDED
        yyls = yyls1;
    #endif    
#else /* Extend the stack our own way.  */    
    if (yystacksize >= YYMAXDEPTH) {
        yyerror("parser stack overflow");
        return 2;
    }
    yystacksize *= 2;
    
    if (yystacksize > YYMAXDEPTH)
        yystacksize = YYMAXDEPTH;
        
    yyss = (short *) alloca (yystacksize * sizeof (*yyssp));
    __yy_memcpy ((char *)yyss, (char *)yyss1, size * sizeof (*yyssp));
    
    yyvs = (YYSTYPE *) alloca (yystacksize * sizeof (*yyvsp));
    __yy_memcpy ((char *)yyvs, (char *)yyvs1, size * sizeof (*yyvsp));
    
    #ifdef YYLSP_NEEDED
        yyls = (YYLTYPE *) alloca (yystacksize * sizeof (*yylsp));
        __yy_memcpy((char *)yyls, (char *)yyls1, size * sizeof (*yylsp));
    #endif
#endif /* no yyoverflow */
